from typing import Optional

from pressfrac.exceptions import PressFracException


class PressFracConfigError(PressFracException):
    """Base class for configuration file errors."""


class ConfigParseError(PressFracConfigError):
    """Raised when a configuration file is not valid INI."""

    def __init__(self, line: Optional[int], message: str) -> None:
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.line = line
        self.message = message


class MissingConfigBlock(PressFracConfigError):
    """Raised when a required section is missing."""

    def __init__(self, block: str) -> None:
        super().__init__(f"Configuration file is missing the [{block}] block.")
        self.block = block


class UnknownConfigKey(PressFracConfigError):
    """Raised for keys or sections the configuration schema does not define."""

    def __init__(self, section: str, key: Optional[str], line: Optional[int], suggestion: Optional[str]) -> None:
        what = f"key {key!r} in [{section}]" if key is not None else f"section [{section}]"
        where = f"line {line}: " if line is not None else ""
        hint = f" Did you mean {suggestion!r}?" if suggestion else ""
        super().__init__(f"{where}Unknown {what}.{hint}")
        self.section = section
        self.key = key
        self.line = line
        self.suggestion = suggestion


class InvalidConfigValue(PressFracConfigError):
    """Raised when a value cannot be converted or fails validation."""

    def __init__(self, section: str, key: Optional[str], message: str, line: Optional[int] = None) -> None:
        what = f"[{section}] {key}" if key else f"[{section}]"
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}Invalid value for {what}: {message}")
        self.section = section
        self.key = key
        self.message = message
        self.line = line
