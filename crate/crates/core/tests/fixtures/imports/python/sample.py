import os
import sys, json as j
from collections import OrderedDict
from . import sibling
from ..pkg.mod import thing
import numpy as np  # numerics


def f():
    import re
    return re.compile("import nothing")
