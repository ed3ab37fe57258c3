"""BDFL engine -- vertical federated logistic regression over Paillier ciphertexts."""

__version__ = "0.1.0"
