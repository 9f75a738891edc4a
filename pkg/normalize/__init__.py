# Normalize package
