# Training package
