"""Hypergraph-product codes with constant-depth, planar-layered syndrome extraction."""

from planarqec.codes import CssCode, PauliOperator, classify, generate_hgp_code, hgp, syndrome, toric_code
from planarqec.circuits import Circuit, cardinal_circuit, coloration_circuit, verify_measures_stabilizers
from planarqec.decoder import DecoderConfig, decode_history
from planarqec.noise_sim import NoiseModel, simulate

__version__ = "0.1.0"

__all__ = [
    "Circuit", "CssCode", "DecoderConfig", "NoiseModel", "PauliOperator", "cardinal_circuit", "classify",
    "coloration_circuit", "decode_history", "generate_hgp_code", "hgp", "simulate", "syndrome", "toric_code",
    "verify_measures_stabilizers",
]
