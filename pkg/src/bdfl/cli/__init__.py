"""Command-line interface: train, compare, table1 and keygen."""
