from treemg import fields
from ..libtest import generic_option_test


def test_option_integer():
    generic_option_test(
        fields.Integer,
        [5],
        [0, 32767, -1],
        ["Test", 1.5, True],
        [("12", 12), (" -3 ", -3), ("none", None)],
        ["1.5", "twelve"],
        "Integer value must be int",
    )
