import { runScript } from './figures.js'

process.exit(runScript(1, process.argv.slice(2)))
