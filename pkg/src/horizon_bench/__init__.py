"""Direct-strategy multi-step time-series forecasting: models, training and benchmark harness."""

from . import dataset, kernels, learn, models, numkit, seriesgen
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "dataset", "kernels", "learn", "models", "numkit", "seriesgen", "__version__"]
