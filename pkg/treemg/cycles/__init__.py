from . import textbook, bufas, topdown
from .textbook import TextbookAdditive
from .bufas import BottomUpFAS
from .topdown import TopDownAdditive, TopDownBPX
