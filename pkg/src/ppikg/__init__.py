"""Text-mined protein interaction graphs and disease-gene link prediction.

The package covers the full path from an abstract corpus to ranked
disease-gene predictions: corpus ingestion and segmentation, protein
tagging (averaged perceptron over BIO tags), sentence-level relation
extraction (feature-engineered logistic regression), knowledge-graph
assembly from text-mined and structured edge sources, rotation-based
complex embeddings (RotatE), and filtered link-prediction evaluation.
"""

__version__ = "0.1.0"
