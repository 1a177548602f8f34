"""Exception hierarchy shared by every stage of the pipeline."""


class TwistFCSError(Exception):
    """Base class; ``stage`` names the module that raised."""

    stage = "twistfcs"

    def record(self):
        return {"error": type(self).__name__, "stage": self.stage, "message": str(self)}


class DimensionError(TwistFCSError, ValueError):
    stage = "numkernel"


class SingularMatrixError(TwistFCSError, ArithmeticError):
    stage = "numkernel"


class NonGenericError(TwistFCSError):
    """Degenerate spectrum, vanishing twist entries or colliding rapidities."""

    stage = "spectrum"


class LinkingError(TwistFCSError):
    stage = "twist_engine"


class TQInconsistentError(TwistFCSError):
    stage = "bethe_engine"


class NotOnShellError(TwistFCSError):
    stage = "formfactor_engine"


class ConfigError(TwistFCSError, ValueError):
    stage = "fcs_cli"

    def __init__(self, message, field=None, line=None):
        self.message = message
        self.field = field
        self.line = line
        where = []
        if field is not None:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)

    def record(self):
        rec = super().record()
        rec.update(field=self.field, line=self.line)
        return rec
