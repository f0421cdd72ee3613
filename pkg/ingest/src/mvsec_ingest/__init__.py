from .convert import ConversionSpec, ConversionError, convert, convert_events, convert_pose

__all__ = [
    "ConversionSpec",
    "ConversionError",
    "convert",
    "convert_events",
    "convert_pose",
]
