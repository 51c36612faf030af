"""Wave-packet parametrices and dispersive estimates for pseudodifferential evolutions."""
from .symbols import CutoffSymbol, PhasePoint, Symbol, model_symbol
from .flow import integrate_flow, flow_jacobian_check, linearization_drift
from .fbi import GridSpec, GridFunction, WavePacketFrame, fbi_adjoint, fbi_forward
from .parametrix import ParametrixConfig, apply_parametrix, fixed_time_decay_scan, parametrix_residual
from .estimates import StrichartzPair, resolvent_ratio_scan, sharpness_witness, strichartz_constant
from .canonical import TruncatedSeries2, residual_order, ssn_recursion

__version__ = "0.1.0"
