# Scoring package
