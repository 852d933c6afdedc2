"""Attention-based encoder-decoder constituency parser.

The package turns a sentence into a constituency tree by translating the
word sequence into a depth-first bracket linearization of the tree, using a
deep LSTM encoder-decoder with an attention mechanism over encoder states.

Modules:
    treetext   parse trees, bracketed I/O, linearization, bracket repair
    vocab      token <-> id maps, input encoding, pretrained embeddings
    numerics   activations, softmax, initializers, gradient checking
    kernels    LSTM cell forward/backward (compiled core, python fallback)
    model      parameters, encoder, attention, decoder, loss and gradients
    checkpoint save/load of parameters with hyperparameters
    decode     beam search and sentence -> tree decoding
    train      SGD training loop with dev-set early stopping
    evaluate   bracket precision/recall/F1 scoring
    corpusgen  toy treebank generation from a small PCFG
    cli        command line interface
"""

__version__ = "0.1.0"
