"""Exception types raised by the simulator."""


class SimulationError(Exception):
    """Base class for all simulator errors."""


class WidthError(SimulationError):
    """Register width out of range, or operand widths incompatible."""


class TypeTagError(SimulationError):
    """Register type tag does not match what the operation requires."""


class NonZeroAncillaError(SimulationError):
    """A register that must read zero in every branch does not.

    Usually signals a missing uncomputation before a free or a pop.
    """


class GarbageStackError(SimulationError):
    """Push/pop discipline violated (empty pop, out-of-order pop)."""


class NonInjectiveError(SimulationError):
    """An in-place update is not a bijection on the values present."""


class ValueOverflowError(SimulationError):
    """A register value would exceed its declared width."""


class LayoutError(SimulationError):
    """Two states that must share a register layout do not."""


class NormError(SimulationError):
    """State norm drifted outside tolerance, or a zero-norm state was
    given to an operation that needs a normalizable one."""
