"""Exception hierarchy for the emulator."""


class EmulatorError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(EmulatorError):
    """A network description is malformed or fails validation."""

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class DelayOutOfRange(EmulatorError, ValueError):
    pass


class AxonOutOfRange(EmulatorError, IndexError):
    pass


class StaleInjection(EmulatorError):
    """An external spike targets a tick that has already been drained,
    or one too far ahead for the scheduler ring."""


class PotentialOverflow(EmulatorError, OverflowError):
    def __init__(self, potential, core=None, neuron=None, tick=None):
        self.potential = potential
        self.core = core
        self.neuron = neuron
        self.tick = tick
        where = []
        if core is not None:
            where.append(f"core {core}")
        if neuron is not None:
            where.append(f"neuron {neuron}")
        if tick is not None:
            where.append(f"tick {tick}")
        loc = (" at " + ", ".join(where)) if where else ""
        super().__init__(f"membrane potential {potential} exceeds bound{loc}")


class ValueOutOfRange(EmulatorError, ValueError):
    pass


class DoesNotFitCore(EmulatorError):
    pass


class DecodeError(EmulatorError):
    pass


class TraceFormatError(EmulatorError, ValueError):
    pass
