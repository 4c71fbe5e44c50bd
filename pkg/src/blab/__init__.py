"""Trial-state energy and error-bound evaluation for dilute Bose gases on the torus."""
__version__ = "0.1.0"
