"""swapnet: learn n-qubit SWAP controls and measure how they scale and degrade."""

__version__ = "0.1.0"
