import { runScript } from './figures.js'

process.exit(runScript(2, process.argv.slice(2)))
