"""vizpipe: turn tabular traffic records into correlation-ordered RGB images
and classify them with a small convolutional network."""

__version__ = "0.1.0"
