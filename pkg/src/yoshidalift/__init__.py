"""Yoshida lifts from definite quaternion algebras: vector-valued quaternionic
forms, their theta lifts to genus two, and the Bessel period identity."""

__version__ = "0.1.0"

from .bessel import (BesselDatum, BesselReport, BinaryQF, HypothesisError, RingClassCharacter,
                     RingClassGroup, bessel_from_fourier, bessel_identity_check, build_bessel_datum,
                     nonvanishing_witness, toric_period)
from .field import FieldTower, NumberField, PrimePlace
from .polyrep import Mat2, PolyVector, pairing_n, pluriharmonic_check, poly_P_k, rho_kappa_apply
from .qalg import ImagQuadField, QuatContext, eichler_mass
from .qmforms import FormSpace, QuatForm, eigenforms
from .yoshida import (FourierTable, GramS, YoshidaLift, check_cuspidality, check_equivariance,
                      reduce_mod_lambda, table_integrality)

__all__ = [
    "BesselDatum", "BesselReport", "BinaryQF", "HypothesisError", "RingClassCharacter",
    "RingClassGroup", "bessel_from_fourier", "bessel_identity_check", "build_bessel_datum",
    "nonvanishing_witness", "toric_period", "FieldTower", "NumberField", "PrimePlace", "Mat2",
    "PolyVector", "pairing_n", "pluriharmonic_check", "poly_P_k", "rho_kappa_apply",
    "ImagQuadField", "QuatContext", "eichler_mass", "FormSpace", "QuatForm", "eigenforms",
    "FourierTable", "GramS", "YoshidaLift", "check_cuspidality", "check_equivariance",
    "reduce_mod_lambda", "table_integrality", "__version__",
]
