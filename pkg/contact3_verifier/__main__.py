from .verifier import main

main()
