"""Packaged data files.

``insole_network.png``
    Reconstructed 1000 x 960 mycelium network image (the original photograph
    is unpublished), generated by :func:`mycosim.synthetic.make_network_image`.
``electrodes_insole.txt``
    Sixteen electrodes E1-E16 along the insole edge of the ingested network.
``scenarios_insole.txt``
    The three input pairs 01, 10, 11 as stimulation scenarios.
``logger_fixture.csv``
    90-minute, 1 Hz, four-channel logger export with known spike counts.
``experiment.ini``
    Full three-scenario experiment on the bundled network.
"""
from importlib.resources import files

NETWORK_IMAGE = "insole_network.png"
ELECTRODE_LAYOUT = "electrodes_insole.txt"
SCENARIOS = "scenarios_insole.txt"
LOGGER_FIXTURE = "logger_fixture.csv"
EXPERIMENT = "experiment.ini"


def path(name):
    """Filesystem path of a packaged data file."""
    return str(files(__name__) / name)
