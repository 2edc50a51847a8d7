"""Turn folders of frames, saliency maps, and box proposals into
instance files for the foreground clustering tool."""

from .errors import PrepError
from .pipeline import prep_images, prep_video

__version__ = "0.1.0"

__all__ = ["PrepError", "prep_images", "prep_video", "__version__"]
