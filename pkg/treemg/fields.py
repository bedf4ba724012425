from __future__ import annotations
from typing import TYPE_CHECKING, Any, cast
import logging
import math
from .exceptions import ConfigurationError

if TYPE_CHECKING:  # pragma: no cover
    from .config import RunConfig

_logger = logging.getLogger(__name__)

# pylint: disable=too-few-public-methods


class Option:
    """
    Base descriptor class for :class:`RunConfig <treemg.config.RunConfig>` options.

    Values are either set as python objects, which are validated by
    ``_convert_type_set``, or parsed from the text of a configuration file or
    command line override with :func:`parse`.

    :ivar name: key of the option
    :vartype name: str
    :ivar default: value used when the option is not set
    :vartype default: Any
    :ivar help: one-line description shown by the command line interface
    :vartype help: str
    """

    # set automatically
    name: str = cast(str, None)

    def __init__(self, default: Any = None, help: str = "") -> None:  # pylint: disable=redefined-builtin
        self.default = default
        self.help = help

    def __repr__(self) -> str:
        return f"{type(self).__name__}(name={self.name})"

    def __set_name__(self, record: type[RunConfig], name: str) -> None:
        self.name = name

    def _convert_type_set(self, value: Any) -> Any:
        return value

    def _parse_text(self, text: str) -> Any:
        return text

    def parse(self, text: str) -> Any:
        """
        Converts the textual representation of a value

        :param text: the text, ``none`` or an empty string unset the option
        :type text: str
        :return: the validated value
        :raises ConfigurationError: if the text is not a valid value
        """
        text = text.strip()
        if text.lower() in ("", "none"):
            return None
        try:
            value = self._parse_text(text)
        except ValueError as e:
            raise ConfigurationError(f"invalid value '{text}' for option '{self.name}'") from e
        return self._convert_type_set(value)

    def __get__(self, record: RunConfig | None, objtype: Any = None) -> Any:
        if record is None:
            return self
        return record._values.get(self.name, self.default)  # pylint: disable=protected-access

    def __set__(self, record: RunConfig, value: Any) -> None:
        if value is not None:
            value = self._convert_type_set(value)
        record._values[self.name] = value  # pylint: disable=protected-access


class Integer(Option):
    """
    Integer option.

    .. testcode:: config_options

       import treemg

       class ExampleConfig(treemg.config.RunConfig):
           sweeps = treemg.fields.Integer(default=5)

       config = ExampleConfig()
       print(config.sweeps)
       config.update({"sweeps": "12"})
       print(config.sweeps)

    .. testoutput:: config_options

       5
       12
    """

    def _parse_text(self, text: str) -> Any:
        return int(text)

    def _convert_type_set(self, value: Any) -> Any:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigurationError("Integer value must be int")
        return value


class Float(Option):
    """
    Float option. Integers are accepted and converted.
    """

    def _parse_text(self, text: str) -> Any:
        if "/" in text:
            numerator, denominator = text.split("/", 1)
            return float(numerator) / float(denominator)
        return float(text)

    def _convert_type_set(self, value: Any) -> Any:
        if not isinstance(value, (float, int)) or isinstance(value, bool):
            raise ConfigurationError("Float value must be float")
        return float(value)


class Complex(Option):
    """
    Complex option, written like python complex literals (``0.8``, ``0.0173-0.01j``)
    """

    def _parse_text(self, text: str) -> Any:
        return complex(text.replace(" ", ""))

    def _convert_type_set(self, value: Any) -> Any:
        if not isinstance(value, (complex, float, int)) or isinstance(value, bool):
            raise ConfigurationError("Complex value must be complex")
        return complex(value)


class String(Option):
    """
    String option
    """

    def _convert_type_set(self, value: Any) -> Any:
        if not isinstance(value, str):
            raise ConfigurationError("String value must be str")
        return value


class Boolean(Option):
    """
    Boolean option, parsed from ``true``/``false``, ``yes``/``no`` or ``1``/``0``
    """

    def _parse_text(self, text: str) -> Any:
        lowered = text.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(text)

    def _convert_type_set(self, value: Any) -> Any:
        if not isinstance(value, bool):
            raise ConfigurationError("Boolean value must be bool")
        return value


class Selection(String):
    """
    Selection option. A string restricted to predefined options.

    .. testcode:: config_options

       class ExampleConfig(treemg.config.RunConfig):
           smoother = treemg.fields.Selection(["jacobi", "block"], default="jacobi")

       config = ExampleConfig()
       config.smoother = "block"
       print(config.smoother)

    .. testoutput:: config_options

       block

    :param options: the admissible values
    :type options: list[str]
    """

    def __init__(self, options: list[str], default: Any = None, help: str = "") -> None:  # pylint: disable=redefined-builtin
        self.options = options
        super().__init__(default, help)

    def _convert_type_set(self, value: Any) -> Any:
        if not (isinstance(value, str) and value in self.options):
            raise ConfigurationError("Selection value must be str and in the list of options")
        return value


class Angle(Float):
    """
    Angle option. Parsed from degrees, stored in radians.

    >>> Angle().parse("30") == math.radians(30)
    True
    """

    def _parse_text(self, text: str) -> Any:
        return math.radians(super()._parse_text(text))
