"""Video deblurring by finding nearby sharp frames and aggregating their
features into the blurry frame's reconstruction."""

__version__ = "0.1.0"

from .errors import ConfigError, DataError, NsfError, NumericError, ShapeError

__all__ = ["NsfError", "ShapeError", "ConfigError", "DataError", "NumericError",
           "__version__"]
