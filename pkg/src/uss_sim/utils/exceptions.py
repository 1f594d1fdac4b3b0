from enum import Enum
from typing import Optional, Dict, Any

from pydantic import ValidationError


class ErrorCode:
    """Process exit codes used by the command-line front end."""
    SUCCESS = 0
    CONFIG_ERROR = 2
    RUNTIME_INVARIANT = 3


class ErrorType(Enum):
    INVALID_INSTANCE = "invalid_instance"
    INVALID_ARGUMENT = "invalid_argument"
    INVALID_INPUT = "invalid_input"
    CAPACITY = "capacity"
    CONFIGURATION = "configuration"
    CONTRACT = "contract"
    INVARIANT = "invariant"
    IO = "io"


_RUNTIME_TYPES = (ErrorType.CONTRACT, ErrorType.INVARIANT)


class UssError(Exception):
    def __init__(
        self,
        message: str,
        error_type: ErrorType = ErrorType.CONFIGURATION,
        raw_error: Optional[Exception] = None,
        error_details: Optional[Dict[str, Any]] = None
    ):
        super().__init__(message)
        self.message = message
        self.error_type = error_type
        self.raw_error = raw_error
        self.error_details = error_details or {}

    @property
    def exit_code(self) -> int:
        if self.error_type in _RUNTIME_TYPES:
            return ErrorCode.RUNTIME_INVARIANT
        return ErrorCode.CONFIG_ERROR

    @classmethod
    def from_validation_error(
        cls,
        error: ValidationError,
        message: Optional[str] = None,
        error_type: ErrorType = ErrorType.CONFIGURATION
    ) -> "UssError":
        fields = {}
        for item in error.errors():
            loc = ".".join(str(part) for part in item.get("loc", ())) or "<root>"
            fields[loc] = item.get("msg", "invalid value")

        if not message:
            first = next(iter(fields.items()), None)
            if first:
                message = f"Invalid {error.title}: {first[0]}: {first[1]}"
            else:
                message = f"Invalid {error.title}"

        return cls(
            message=message,
            error_type=error_type,
            raw_error=error,
            error_details={"fields": fields}
        )

    def __str__(self) -> str:
        return f"[{self.error_type.value}] {self.message}"
