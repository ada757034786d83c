"""IRS beam focusing, Huygens-Fresnel verification and outage analysis for FSO links."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .beam_optics import BeamParams, FieldSample  # noqa: E402
from .channel import LinkBudget, TurbulenceModel, outage_analytic, outage_lower_bound  # noqa: E402
from .diffraction import RxProfile, compare_profiles, geometric_optics_profile, huygens_fresnel_field  # noqa: E402
from .irs_phase import IrsGeometry, PhaseProfile, design_focus, phase_shift_profile  # noqa: E402
from .montecarlo import McConfig, McEstimate, simulate_outage  # noqa: E402
from .numerics import QuadratureSpec, RngStream  # noqa: E402
from .pointing import HpDistribution, PointingScenario, pdf_hp  # noqa: E402

__all__ = [
    "BACKEND", "BeamParams", "FieldSample", "HpDistribution", "IrsGeometry", "LinkBudget", "McConfig",
    "McEstimate", "PhaseProfile", "PointingScenario", "QuadratureSpec", "RngStream", "RxProfile",
    "TurbulenceModel", "compare_profiles", "design_focus", "geometric_optics_profile", "huygens_fresnel_field",
    "outage_analytic", "outage_lower_bound", "pdf_hp", "phase_shift_profile", "simulate_outage",
]
