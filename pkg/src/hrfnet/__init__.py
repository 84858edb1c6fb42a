"""HRFNet: shallow/deep RGB+SRM forgery localization for high-resolution imagery."""
__version__ = "0.1.0"
