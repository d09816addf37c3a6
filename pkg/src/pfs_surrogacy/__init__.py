"""PFS treatment-effect measures as diagnostic tests for significant OS benefit."""

__version__ = "0.1.0"
