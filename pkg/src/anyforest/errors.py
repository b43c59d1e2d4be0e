class AnyforestError(Exception):
    pass


class StructureError(AnyforestError, ValueError):
    """A forest, tree, state or order violates its structural invariants."""


class SchemaError(AnyforestError, ValueError):
    """A serialized document does not follow the expected schema."""


class DataError(AnyforestError, ValueError):
    """A dataset could not be loaded or is unusable."""


class LatticeCapExceeded(AnyforestError):
    """The state lattice is larger than the configured cap."""

    def __init__(self, n_states, cap):
        self.n_states = n_states
        self.cap = cap
        super().__init__(
            f"state lattice has {n_states} states, cap is {cap}; "
            "use a squirrel order (fsquirrel/bsquirrel) for forests of this size"
        )


class UnsupportedForestError(AnyforestError):
    """The requested generator does not support this forest."""
