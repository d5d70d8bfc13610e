"""Version marker for the report schemas written to disk."""

REPORT_SCHEMA_VERSION = "v1"
