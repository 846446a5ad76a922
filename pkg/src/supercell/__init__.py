"""Planning models for tall-tower, high-gain, highly sectorized cell sites.

Submodules
----------
core         link budget, noise power, beamwidth-gain relation
propagation  standard propagation model, knife-edge diffraction, LOS, two-ray
antenna      Luneburg lens and flat-panel gain models, sector patterns
windload     effective projected area of panel and lens installations
capacity     Laplacian azimuth spread, CINR and capacity versus sector count
coverage     ESRI ASCII terrain grids, RSRP maps, coverage statistics
calibration  least-squares tuning of propagation coefficients
"""

from .errors import (
    DegenerateSpreadError,
    DomainError,
    GridParseError,
    InvalidArgument,
    NumericalError,
    SupercellError,
)

__version__ = "0.1.0"

__all__ = [
    "DegenerateSpreadError",
    "DomainError",
    "GridParseError",
    "InvalidArgument",
    "NumericalError",
    "SupercellError",
    "__version__",
]
