import numpy as np

from ..stl import Trace


def griewank(x) -> float:
    """Griewank function ``1 + sum(x_i^2)/4000 - prod(cos(x_i/sqrt(i)))``, minimum 0 at the origin."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValueError("griewank expects a non-empty vector")
    i = np.arange(1, x.size + 1)
    return float(1.0 + np.sum(x * x) / 4000.0 - np.prod(np.cos(x / np.sqrt(i))))


def griewank_trace(values: dict) -> Trace:
    """Single-sample trace holding the parameters and the function value ``f``."""
    x = [values[name] for name in values]
    signals = {name: [float(v)] for name, v in values.items()}
    signals["f"] = [griewank(x)]
    return Trace(dt=1.0, start_time=0.0, signals=signals)
