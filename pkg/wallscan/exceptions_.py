# -*- coding: utf-8 -*-

"""Error classes raised by the wallscan package."""


class EmptyInputError(ValueError):
    """A point cloud or value set had nothing in it, but the operation
    needs at least one entry.

    """
    pass


class DegenerateInputError(ValueError):
    """The input geometry cannot support the requested computation
    (too few points, collinear points, zero-area box).

    """
    pass


class DegenerateConfigurationError(DegenerateInputError):
    """Target pairs for registration are too few or collinear."""
    pass


class InvariantError(ValueError):
    """A value was built that breaks the rules of its type, eg. a
    rotation that is not orthonormal.

    """
    pass


class CloudFormatError(ValueError):
    """A point cloud or table file could not be parsed.

    Attributes
    ----------
    path : str
      The file being read.
    lineno : int
      One-based line number of the offending line, or None.

    """
    def __init__(self, msg, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        if lineno is not None:
            msg = "{}, line {}: {}".format(path, lineno, msg)
        elif path is not None:
            msg = "{}: {}".format(path, msg)
        super().__init__(msg)


class RegistrationError(RuntimeError):
    """Registration could not produce a transform, eg. every
    correspondence was rejected.

    """
    pass


class FieldExtentError(ValueError):
    """A deformation field was asked for values outside its domain."""
    pass


class ConfigError(ValueError):
    """A configuration file or option is malformed or refers to a
    missing input."""
    pass
