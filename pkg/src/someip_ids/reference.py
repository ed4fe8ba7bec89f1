"""Published reference numbers, used for display next to obtained results only."""

# Sequence counts per class: (training, testing).
DATASET_CLASS_COUNTS = {
    "Normal": (2533, 2471),
    "Error on Error": (39, 54),
    "Error on Event": (60, 54),
    "Missing Response": (92, 81),
    "Missing Request": (83, 111),
}

# (recall, precision, f1) per fold / model and class.
VALIDATION_RESULTS = {
    1: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (1.0, 0.87, 0.93),
        "Error on Error": (0.61, 0.61, 0.61),
        "Missing Response": (0.93, 0.93, 0.93),
        "Missing Request": (0.93, 1.0, 0.96),
    },
    2: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (1.0, 0.95, 0.97),
        "Error on Error": (0.77, 0.91, 0.83),
        "Missing Response": (0.90, 0.93, 0.91),
        "Missing Request": (0.93, 0.96, 0.95),
    },
    3: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (0.9, 1.0, 0.95),
        "Error on Error": (1.0, 0.87, 0.93),
        "Missing Response": (0.97, 0.88, 0.93),
        "Missing Request": (0.77, 0.87, 0.82),
    },
}

TEST_RESULTS = {
    1: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (0.98, 0.93, 0.95),
        "Error on Error": (0.67, 0.97, 0.79),
        "Missing Response": (0.81, 0.88, 0.84),
        "Missing Request": (0.94, 0.93, 0.93),
    },
    2: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (1.0, 0.93, 0.96),
        "Error on Error": (0.81, 0.81, 0.81),
        "Missing Response": (0.79, 0.79, 0.79),
        "Missing Request": (0.88, 0.96, 0.92),
    },
    3: {
        "Normal": (0.99, 0.99, 0.99),
        "Error on Event": (0.98, 0.98, 0.98),
        "Error on Error": (0.91, 0.82, 0.86),
        "Missing Response": (0.78, 0.84, 0.81),
        "Missing Request": (0.86, 0.89, 0.87),
    },
}
