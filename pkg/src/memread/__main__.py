from memread.cli import main

main()
