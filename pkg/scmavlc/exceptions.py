"""

"""


class DimensionError(ValueError):
    def __init__(self, what, expected, actual):
        super().__init__(
            "Dimension mismatch for {what}: expected {expected}, got {actual}.".format(
                what=what, expected=expected, actual=actual
            ),
            what,
            expected,
            actual,
        )


class DomainError(ValueError):
    def __init__(self, what, value, requirement):
        super().__init__(
            "'{what}' must be {requirement} (got {value!r}).".format(
                what=what, requirement=requirement, value=value
            ),
            what,
            value,
            requirement,
        )


class CapacityError(ValueError):
    def __init__(self, what, count, limit):
        super().__init__(
            "Capacity exceeded: {count} {what} (limit {limit}).".format(
                what=what, count=count, limit=limit
            ),
            what,
            count,
            limit,
        )


class ConvergenceError(RuntimeError):
    def __init__(self, message, attempts):
        super().__init__(
            "{message} after {attempts} attempt(s).".format(
                message=message, attempts=attempts
            ),
            attempts,
        )


class UnsupportedError(ValueError):
    def __init__(self, operation, reason):
        super().__init__(
            "'{operation}' is unsupported: {reason}.".format(
                operation=operation, reason=reason
            ),
            operation,
            reason,
        )


class UnderflowError(ArithmeticError):
    def __init__(self, where):
        super().__init__("All beliefs underflowed to zero in %s." % where, where)


class ConfigError(ValueError):
    def __init__(self, message, *details):
        super().__init__("Invalid configuration: %s" % message, *details)


class FormatError(ValueError):
    def __init__(self, source, line_no, message):
        super().__init__(
            "{source}:{line}: {message}".format(
                source=source, line=line_no, message=message
            ),
            source,
            line_no,
        )


class ImmutabilityError(AttributeError):
    def __init__(self, instance, name):
        super().__init__(
            "Can't mutate attribute '{name}'.".format(name=name), instance, name
        )


def unexpected_type_error(arg_name, expected_type, actual_value):
    return TypeError(
        "'{name}' must be {type!r} (got {value!r} that is a "
        "{actual!r}).".format(
            name=arg_name,
            type=expected_type,
            actual=actual_value.__class__,
            value=actual_value,
        ),
        arg_name,
        expected_type,
        actual_value,
    )
