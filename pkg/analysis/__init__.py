from . import metrics
from . import threshold
from . import fitting
from . import truncation
from . import plot_data
from . import report
