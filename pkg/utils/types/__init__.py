from .errors import (
    ConfigParseError,
    InvalidConfigValue,
    MissingConfigBlock,
    PressFracConfigError,
    UnknownConfigKey,
)
