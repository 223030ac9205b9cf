"""molFTP: fragment-target prevalence vectors with leakage control."""

__version__ = "0.1.0"
