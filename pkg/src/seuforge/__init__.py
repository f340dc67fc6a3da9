"""seuforge: alpha-particle LET curves and SRAM single-event-upset simulation.

The package has three layers:

* stopping/materials: He-ion electronic stopping power for Si, Ge, and SiGe
  alloys, Bragg-peak search, CSDA ranges, LET-to-charge conversion;
* devices/circuit: a charge-sheet compact FET model and a small nodal
  DC/transient solver with Gaussian current-pulse stimuli;
* sram: a six-transistor stacked-nanosheet cell, butterfly/SNM extraction,
  particle-strike scenarios, critical-LET search, and collection-efficiency
  calibration.

The ``seuforge`` CLI exposes the same operations and a ``report`` path that
writes CSV outputs plus rendered figures.
"""

from __future__ import annotations

from .errors import (CalibrationError, ConfigError, DomainError,
                     SeuForgeError, SolverError, ValidationError)
from .materials import (ELEMENTS, GERMANIUM, SILICON, Material,
                        parse_material, silicon_germanium)
from .stopping import (ConversionSettings, LetCurve, LetMax, StoppingTable,
                       csda_range, find_let_max, is_unimodal, let_curve,
                       let_to_charge_density, stopping_power)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError", "ConfigError", "DomainError", "SeuForgeError",
    "SolverError", "ValidationError",
    "ELEMENTS", "GERMANIUM", "SILICON", "Material", "parse_material",
    "silicon_germanium",
    "ConversionSettings", "LetCurve", "LetMax", "StoppingTable",
    "csda_range", "find_let_max", "is_unimodal", "let_curve",
    "let_to_charge_density", "stopping_power",
    "__version__",
]
