"""Find EVM proxy contracts, classify their upgradeability and audit who controls them."""

__version__ = "0.1.0"
