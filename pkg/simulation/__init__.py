from . import circuit
from . import ttn
from . import statevector
from . import stabilizer
from . import noise
