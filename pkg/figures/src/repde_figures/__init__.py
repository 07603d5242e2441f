"""Figure rendering for repde experiment outputs.

Reads only the documented CSV/JSON files written by the repde CLI and maps
them onto matplotlib axes; no rates, residuals, or any other science
numbers are recomputed here.
"""

__version__ = "0.1.0"
