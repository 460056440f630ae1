"""Response spectra from phase estimation with a sin-state input register."""

from .block_encoding import BEncoding, apply_vb, normalization_factor
from .errors import (
    DimensionError,
    EpeError,
    HermiticityError,
    NormalizationError,
    PostselectionError,
    PreconditionError,
    ResourceError,
    SchemaError,
    ValidationError,
)
from .estimation import (
    LeakageReport,
    PeakEstimate,
    compare_to_lines,
    estimate_peak,
    estimate_peaks,
    find_peaks,
    leakage_f,
    phase_mse,
    worst_case_mse,
)
from .evolution import ExactEvolution, TrotterPlan, apply_controlled_power, dense_unitary, exact_unitary, make_plan
from .models import (
    OperatorBundle,
    PlasmonConfig,
    build_dipole,
    build_plasmon,
    exact_plasmon_spectrum,
    hermitize_multipole,
    load_bundle,
    save_bundle,
)
from .pauli import PauliString, PauliSum, jordan_wigner, lcu_decompose, matrix_to_pauli, one_body_to_pauli
from .spectral import (
    LineSpectrum,
    SpectrumResult,
    circuit_oracle,
    convolve,
    exact_lines,
    kernel,
    run_appendix_circuit,
    run_circuit,
)
from .statevector import RegisterLayout, Statevector, measure_distribution, sample

__all__ = [name for name in dir() if not name.startswith("_")]
