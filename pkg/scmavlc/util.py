import numpy as np

from .exceptions import ImmutabilityError


def __scma_immutable_setattr(inst, key, value):
    raise ImmutabilityError(inst, key)


def __scma_immutable_delattr(inst, key):
    raise ImmutabilityError(inst, key)


def immutable(cls):
    """Class decorator blocking attribute assignment after construction.

    Instances initialise their slots with ``object.__setattr__``.
    """
    cls.__setattr__ = __scma_immutable_setattr
    cls.__delattr__ = __scma_immutable_delattr
    return cls


def frozen(values, dtype=float):
    """Copy ``values`` into a read-only ndarray.

    :param values: Array-like input.
    :param dtype: Target dtype.
    :rtype: ``numpy.ndarray``
    """
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def init_slots(inst, **values):
    """Set slots on an :func:`immutable` instance."""
    for key, value in values.items():
        object.__setattr__(inst, key, value)
