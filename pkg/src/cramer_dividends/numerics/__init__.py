from .fitting import LinearFit, LogFit, PowerFit, SingularDesignError, fit_linear, fit_log, fit_power
from .ode import IvpConfig, IvpResult, integrate_ivp
from .quadrature import QuadratureError, adaptive_simpson, quad_exp_weight

__all__ = [
    "IvpConfig",
    "IvpResult",
    "integrate_ivp",
    "QuadratureError",
    "adaptive_simpson",
    "quad_exp_weight",
    "LinearFit",
    "PowerFit",
    "LogFit",
    "SingularDesignError",
    "fit_linear",
    "fit_power",
    "fit_log",
]
