"""Follow recommendations for federated social networks.

Builds unbiased samples of a federated follow graph, generates
whom-to-follow recommendations (BM25 collaborative filtering and
personalized PageRank), and evaluates them offline (p@k, MAP, s@k,
paired t-tests) and online (balanced interleaving with click
attribution).
"""

from fedirec.users import UserRef

__version__ = "0.1.0"

__all__ = ["UserRef", "__version__"]
