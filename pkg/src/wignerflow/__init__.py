"""Phase-space Wigner flow for the harmonic oscillator with an inverse-square
term: eigenstates, closed-form and quadrature Wigner functions, Wigner
currents, stagnation points, classical boundaries and flux quantifiers."""

from .quantum import (
    FieldLabel,
    PhaseGrid,
    ScalarField,
    SupportMode,
    SystemConfig,
    eigenenergy,
    eigenstate,
    evaluate_field,
    wigner_closed,
    wigner_quadrature,
    y_kernel_closed,
    y_kernel_quadrature,
)

__version__ = "0.1.0"
