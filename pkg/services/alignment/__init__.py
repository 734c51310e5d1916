from .boundary import eligible_boundaries, join_tokens, partition, select_boundary
from .manifest import parse_manifest, parse_record, read_jsonl, write_manifest
from .sanitize import is_anomalous, is_misclassified, sanitize_tokens
