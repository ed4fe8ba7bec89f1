"""SOME/IP intrusion detection workbench: traffic generation, sequence
preparation, a numpy RNN classifier and its evaluation protocol."""

__version__ = "0.1.0"
