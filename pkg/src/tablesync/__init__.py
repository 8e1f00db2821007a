"""Cross-language infobox synchronization: alignment, repair rules, review."""

from .align import (AlignmentPair, AlignmentResult, DEFAULT_THRESHOLDS,
                    ThresholdSet, align_pipeline, coverage, greedy_mutual_match)
from .corpus import (Corpus, CorpusStats, GoldAlignment, Infobox, Row,
                     compute_stats, load_corpus, rare_keys, resource_tier,
                     row_difference, save_corpus, transfer_stats)
from .errors import (ConflictError, ConvergenceError, ProviderError,
                     TableSyncError, ValidationError)
from .metrics import (MatchScore, PairEvaluation, error_breakdown, group_report,
                      match_score, unmatch_score)
from .providers import (DictionaryTranslator, HashedBowEmbedder,
                        KeyTranslationMap, ResponseCache, build_vote_map,
                        cosine, translate_table)
from .review import Citation, ReviewQueue, render_description
from .rules import (EditProposal, UpdateConfig, apply_proposals, apply_rules,
                    extract_time, parse_numeric, synchronize_fixpoint)
from .tuning import GridSpec, TuningItem, tune_thresholds

__version__ = "0.1.0"
