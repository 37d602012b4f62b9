from . import color_code
from . import matching
from . import decoder
