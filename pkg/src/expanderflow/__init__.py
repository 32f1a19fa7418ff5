"""Forward self-similar harmonic-map heat flow: mild-solution solver,
equivariant shooting oracle, and verification diagnostics.

Submodules are imported lazily so the command-line entry point can pin
BLAS thread counts before numpy loads.
"""

__version__ = "0.1.0"

_EXPORTS = {
    "GridSpec": "fields",
    "LatticeField": "fields",
    "SphericalData": "fields",
    "corotational_data": "fields",
    "ManifoldDescriptor": "manifold",
    "unit_sphere": "manifold",
    "IterationConfig": "duhamel",
    "IterationMode": "duhamel",
    "IterationStatus": "duhamel",
    "picard_iterate": "duhamel",
}

__all__ = list(_EXPORTS)


def __getattr__(name):
    if name in _EXPORTS:
        import importlib

        module = importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
