"""Twitter-volume event detection, sentiment classification and market-model
event-study analytics."""

__version__ = "0.1.0"

from .errors import TweetEventsError  # noqa: F401
