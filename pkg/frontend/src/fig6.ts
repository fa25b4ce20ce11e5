import { runScript } from './figures.js'

process.exit(runScript(6, process.argv.slice(2)))
