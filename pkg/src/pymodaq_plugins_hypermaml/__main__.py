from pymodaq_plugins_hypermaml.app.cli import main

if __name__ == '__main__':
    main()
