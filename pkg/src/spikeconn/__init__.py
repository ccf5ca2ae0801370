"""spikeconn: simulate spiking networks, estimate connectivity, evaluate it.

The package is organised along the processing chain:

``spikedata``    spike-train containers, binning, jitter surrogates, SDF I/O
``topology``     ground-truth network construction and degree analysis
``simulator``    Izhikevich / conductance-IF network simulation
``estimators``   cross-correlation, mutual-information and transfer-entropy
                 connectivity estimators
``tspe``         the edge-filter-bank estimator over cross-correlograms
``inference``    thresholding of connectivity matrices
``analysis``     ROC / confusion evaluation, graph metrics, dynamics, timing
``cli``          command-line pipeline driver
"""

__version__ = "0.1.0"
