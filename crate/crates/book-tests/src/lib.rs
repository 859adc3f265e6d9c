// chapter doc-test bindings pending
