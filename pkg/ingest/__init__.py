# Ingest package
