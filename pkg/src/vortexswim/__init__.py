"""Self-propelled swimmer navigation in a cylinder wake: IB-LBM + LSTM-DQN."""

__version__ = "0.1.0"
